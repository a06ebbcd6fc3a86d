#pragma once

#include "ductwork/barrier.hpp"
#include "ductwork/bench.hpp"
#include "ductwork/channel.hpp"
#include "ductwork/coloring.hpp"
#include "ductwork/consolidation.hpp"
#include "ductwork/duct.hpp"
#include "ductwork/frame.hpp"
#include "ductwork/hub.hpp"
#include "ductwork/message.hpp"
#include "ductwork/network.hpp"
#include "ductwork/records.hpp"
#include "ductwork/socket_transport.hpp"
#include "ductwork/stats.hpp"
#include "ductwork/sync_modes.hpp"
#include "ductwork/topology.hpp"
#include "ductwork/transport.hpp"
