#pragma once

#include "pandaface/alignment.hpp"
#include "pandaface/config.hpp"
#include "pandaface/error.hpp"
#include "pandaface/evaluation.hpp"
#include "pandaface/features.hpp"
#include "pandaface/gabor.hpp"
#include "pandaface/gallery_io.hpp"
#include "pandaface/image.hpp"
#include "pandaface/image_io.hpp"
#include "pandaface/lbp.hpp"
#include "pandaface/log.hpp"
#include "pandaface/manifest.hpp"
#include "pandaface/pipeline.hpp"
#include "pandaface/pls.hpp"
#include "pandaface/recognition.hpp"
#include "pandaface/synth.hpp"
