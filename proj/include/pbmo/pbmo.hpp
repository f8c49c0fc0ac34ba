#pragma once

#include "pbmo/chains.hpp"
#include "pbmo/cover.hpp"
#include "pbmo/pde.hpp"
