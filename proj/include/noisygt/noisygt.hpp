#pragma once

// Umbrella header.

#include "bounds.hpp"
#include "channel.hpp"
#include "common.hpp"
#include "decoders.hpp"
#include "design.hpp"
#include "kl.hpp"
#include "output.hpp"
#include "rng.hpp"
#include "simulate.hpp"
#include "version.hpp"
