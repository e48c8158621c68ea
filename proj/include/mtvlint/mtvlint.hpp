#pragma once

#include "mtvlint/chartspec.hpp"
#include "mtvlint/data.hpp"
#include "mtvlint/lint.hpp"
#include "mtvlint/morphisms.hpp"
#include "mtvlint/mtv.hpp"
#include "mtvlint/raster.hpp"
#include "mtvlint/rng.hpp"
#include "mtvlint/scene.hpp"
#include "mtvlint/simlab.hpp"
