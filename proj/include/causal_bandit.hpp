#pragma once

#include "causal_bandit/arm.hpp"
#include "causal_bandit/bandit.hpp"
#include "causal_bandit/dag.hpp"
#include "causal_bandit/errors.hpp"
#include "causal_bandit/experiment.hpp"
#include "causal_bandit/gallery.hpp"
#include "causal_bandit/instance_io.hpp"
#include "causal_bandit/intervention_design.hpp"
#include "causal_bandit/lasso.hpp"
#include "causal_bandit/noise.hpp"
#include "causal_bandit/regressor.hpp"
#include "causal_bandit/sem.hpp"
#include "causal_bandit/structure_learning.hpp"
#include "causal_bandit/text.hpp"
#include "causal_bandit/trace.hpp"
