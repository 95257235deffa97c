#pragma once

#include "iets/channel.hpp"
#include "iets/error.hpp"
#include "iets/gmd.hpp"
#include "iets/linalg.hpp"
#include "iets/mc_engine.hpp"
#include "iets/modem.hpp"
#include "iets/transceiver.hpp"
