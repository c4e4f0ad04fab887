#pragma once

#include "bd_sampler.hpp"
#include "bit_matrix.hpp"
#include "common.hpp"
#include "dag.hpp"
#include "data.hpp"
#include "estimators.hpp"
#include "exact.hpp"
#include "io.hpp"
#include "mh_sampler.hpp"
#include "score.hpp"
#include "trace.hpp"
