#pragma once

#include "lrdhom/core/fft.hpp"
#include "lrdhom/core/io.hpp"
#include "lrdhom/core/parallel.hpp"
#include "lrdhom/core/rng.hpp"
#include "lrdhom/experiment.hpp"
#include "lrdhom/green_operator.hpp"
#include "lrdhom/hermite_chaos.hpp"
#include "lrdhom/hermite_limit.hpp"
#include "lrdhom/lrd_gaussian.hpp"
#include "lrdhom/random_solver.hpp"
#include "lrdhom/stats.hpp"
