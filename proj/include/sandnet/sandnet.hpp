#pragma once

#include "sandnet/expr.hpp"
#include "sandnet/network.hpp"
#include "sandnet/netfile.hpp"
#include "sandnet/eikonal.hpp"
#include "sandnet/rolling.hpp"
#include "sandnet/analysis.hpp"
#include "sandnet/audit.hpp"
#include "sandnet/cli.hpp"
