#pragma once

#include "bptsan/errors.hpp"
#include "bptsan/platform.hpp"
#include "bptsan/random.hpp"
#include "bptsan/diffcore/tensor.hpp"
#include "bptsan/diffcore/tape.hpp"
#include "bptsan/diffcore/ops.hpp"
#include "bptsan/encoding/encoding.hpp"
#include "bptsan/snn/layers.hpp"
#include "bptsan/snn/actor.hpp"
#include "bptsan/envs/envs.hpp"
#include "bptsan/rl/components.hpp"
#include "bptsan/rl/agents.hpp"
#include "bptsan/rl/rollout.hpp"
#include "bptsan/harness/config.hpp"
#include "bptsan/harness/metrics.hpp"
#include "bptsan/harness/checkpoint.hpp"
#include "bptsan/harness/trainer.hpp"
#include "bptsan/harness/ablate.hpp"
