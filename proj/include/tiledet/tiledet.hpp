#pragma once

// Umbrella header for the tiledet toolkit.

#include "tiledet/augment.hpp"
#include "tiledet/detect.hpp"
#include "tiledet/draw.hpp"
#include "tiledet/enhance.hpp"
#include "tiledet/eval.hpp"
#include "tiledet/image_io.hpp"
#include "tiledet/manifest.hpp"
#include "tiledet/pipeline.hpp"
#include "tiledet/rng.hpp"
#include "tiledet/serialize.hpp"
#include "tiledet/subprocess_detector.hpp"
#include "tiledet/synth.hpp"
#include "tiledet/tiling.hpp"
#include "tiledet/types.hpp"
