#pragma once

#include "bmsdp/common.hpp"
#include "bmsdp/symmat.hpp"
#include "bmsdp/sphere_manifold.hpp"
#include "bmsdp/stiefel_manifold.hpp"
#include "bmsdp/solver.hpp"
#include "bmsdp/instances.hpp"
#include "bmsdp/analysis.hpp"
#include "bmsdp/experiments.hpp"
