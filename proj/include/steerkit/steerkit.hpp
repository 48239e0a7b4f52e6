#pragma once

#include "steerkit/alignment.hpp"
#include "steerkit/bridge.hpp"
#include "steerkit/codec.hpp"
#include "steerkit/config.hpp"
#include "steerkit/ddpm.hpp"
#include "steerkit/denoisers.hpp"
#include "steerkit/error.hpp"
#include "steerkit/evaluation.hpp"
#include "steerkit/geometry.hpp"
#include "steerkit/grid.hpp"
#include "steerkit/io.hpp"
#include "steerkit/scene.hpp"
#include "steerkit/steering.hpp"
