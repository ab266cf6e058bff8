#pragma once

#include "compeq/core.hpp"
#include "compeq/equilibrium.hpp"
#include "compeq/analysis.hpp"
#include "compeq/structure.hpp"
#include "compeq/io.hpp"
