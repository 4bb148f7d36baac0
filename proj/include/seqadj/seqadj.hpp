#pragma once

#include "seqadj/builtin_systems.hpp"
#include "seqadj/core_model.hpp"
#include "seqadj/discrete_adjoint.hpp"
#include "seqadj/fd_oracle.hpp"
#include "seqadj/forward_sensitivity.hpp"
#include "seqadj/hmm/algorithms.hpp"
#include "seqadj/hmm/bridge.hpp"
#include "seqadj/hmm/builtin.hpp"
#include "seqadj/hmm/config.hpp"
#include "seqadj/hmm/model.hpp"
#include "seqadj/types.hpp"
#include "seqadj/work_count.hpp"
#include "seqadj/workbench.hpp"
