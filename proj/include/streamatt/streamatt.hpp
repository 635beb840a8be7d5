#pragma once

#include "streamatt/attention.hpp"
#include "streamatt/bridge_client.hpp"
#include "streamatt/error.hpp"
#include "streamatt/features.hpp"
#include "streamatt/harness.hpp"
#include "streamatt/metrics.hpp"
#include "streamatt/mock_model.hpp"
#include "streamatt/model.hpp"
#include "streamatt/policy.hpp"
#include "streamatt/tokens.hpp"
#include "streamatt/wire.hpp"
