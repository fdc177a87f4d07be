// Umbrella header.
#pragma once

#include "isddp/cuts.hpp"
#include "isddp/ddp_engine.hpp"
#include "isddp/json_io.hpp"
#include "isddp/lp_core.hpp"
#include "isddp/model.hpp"
#include "isddp/oracle.hpp"
#include "isddp/parallel.hpp"
#include "isddp/portfolio.hpp"
#include "isddp/run_log.hpp"
#include "isddp/schedules.hpp"
#include "isddp/sddp_engine.hpp"
#include "isddp/simplex.hpp"
#include "isddp/stage_problem.hpp"
