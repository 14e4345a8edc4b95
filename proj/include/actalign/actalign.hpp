#pragma once

#include "actalign/affinity.hpp"
#include "actalign/align.hpp"
#include "actalign/classify.hpp"
#include "actalign/corpus.hpp"
#include "actalign/error.hpp"
#include "actalign/matrix.hpp"
#include "actalign/parallel.hpp"
#include "actalign/report.hpp"
#include "actalign/runner.hpp"
#include "actalign/seed.hpp"
#include "actalign/signal.hpp"
#include "actalign/tensor_io.hpp"
