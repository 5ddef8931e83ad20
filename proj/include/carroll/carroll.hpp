#pragma once

#include "carroll/core.hpp"
#include "carroll/diff.hpp"
#include "carroll/expr.hpp"
#include "carroll/atlas.hpp"
#include "carroll/geometry.hpp"
#include "carroll/connection.hpp"
#include "carroll/kk_metric.hpp"
#include "carroll/ode.hpp"
#include "carroll/geodesics.hpp"
#include "carroll/ini.hpp"
#include "carroll/grid.hpp"
#include "carroll/linearize.hpp"
#include "carroll/scenario.hpp"
#include "carroll/checks.hpp"
#include "carroll/io.hpp"
