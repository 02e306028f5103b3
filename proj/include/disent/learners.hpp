#pragma once

#include "disent/learners/discretize.hpp"
#include "disent/learners/gbt.hpp"
#include "disent/learners/linear_svm.hpp"
#include "disent/learners/logistic.hpp"
#include "disent/learners/majority_vote.hpp"
#include "disent/learners/mutual_info.hpp"
#include "disent/learners/stats.hpp"
