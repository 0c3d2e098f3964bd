#pragma once

#include <parasdm/types.hpp>
#include <parasdm/parameters.hpp>
#include <parasdm/cost.hpp>
#include <parasdm/model.hpp>
#include <parasdm/policy_system.hpp>
#include <parasdm/soft_solver.hpp>
#include <parasdm/sensitivity.hpp>
#include <parasdm/anneal.hpp>
#include <parasdm/controller.hpp>
#include <parasdm/scenario.hpp>
#include <parasdm/random_models.hpp>
#include <parasdm/oracle.hpp>
#include <parasdm/trajectory.hpp>
#include <parasdm/config.hpp>
#include <parasdm/simulation.hpp>
#include <parasdm/verify.hpp>
