#pragma once

#include "chbreak/breaking.hpp"
#include "chbreak/config.hpp"
#include "chbreak/convergence.hpp"
#include "chbreak/elliptic.hpp"
#include "chbreak/equation.hpp"
#include "chbreak/error.hpp"
#include "chbreak/invariants.hpp"
#include "chbreak/io.hpp"
#include "chbreak/jet.hpp"
#include "chbreak/spectral.hpp"
#include "chbreak/timestepper.hpp"
#include "chbreak/trajectory.hpp"
