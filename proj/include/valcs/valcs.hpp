#pragma once

#include "valcs/bitstream.hpp"
#include "valcs/codec.hpp"
#include "valcs/error.hpp"
#include "valcs/frame.hpp"
#include "valcs/ida.hpp"
#include "valcs/metrics.hpp"
#include "valcs/pgm.hpp"
#include "valcs/plugin.hpp"
#include "valcs/reconstruction.hpp"
#include "valcs/sensing.hpp"
#include "valcs/stream.hpp"
#include "valcs/transform.hpp"
#include "valcs/vfi.hpp"
#include "valcs/video_io.hpp"
