#pragma once

#include "revmix/config.hpp"
#include "revmix/core.hpp"
#include "revmix/csv.hpp"
#include "revmix/global_maps.hpp"
#include "revmix/limit_maps.hpp"
#include "revmix/map_core.hpp"
#include "revmix/orbit_analysis.hpp"
#include "revmix/return_maps.hpp"
#include "revmix/saddle_local.hpp"
#include "revmix/sweep.hpp"
