#pragma once

#include "spm/errors.hpp"
#include "spm/rng.hpp"
#include "spm/linalg.hpp"
#include "spm/signed_graph.hpp"
#include "spm/power_mean.hpp"
#include "spm/ssbm.hpp"
#include "spm/baselines.hpp"
#include "spm/clustering.hpp"
#include "spm/experiments.hpp"
