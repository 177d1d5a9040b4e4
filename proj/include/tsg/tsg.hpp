#pragma once

#include "tsg/distribution.hpp"
#include "tsg/errors.hpp"
#include "tsg/experiment.hpp"
#include "tsg/format.hpp"
#include "tsg/instance.hpp"
#include "tsg/instance_io.hpp"
#include "tsg/parallel.hpp"
#include "tsg/rng.hpp"
#include "tsg/sample_complexity.hpp"
#include "tsg/scores.hpp"
#include "tsg/solvers.hpp"
#include "tsg/stackexchange.hpp"
#include "tsg/utility.hpp"
#include "tsg/value_function.hpp"
