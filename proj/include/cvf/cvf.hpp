#pragma once

#include "cvf/app/manifest.hpp"
#include "cvf/binary_io.hpp"
#include "cvf/checkpoint.hpp"
#include "cvf/datagen/dataset.hpp"
#include "cvf/datagen/linear_ode.hpp"
#include "cvf/datagen/wave.hpp"
#include "cvf/error.hpp"
#include "cvf/eval/diagnose.hpp"
#include "cvf/eval/metrics.hpp"
#include "cvf/eval/protocols.hpp"
#include "cvf/field.hpp"
#include "cvf/model.hpp"
#include "cvf/nn/adamw.hpp"
#include "cvf/nn/mlp.hpp"
#include "cvf/nn/tensor.hpp"
#include "cvf/normalize.hpp"
#include "cvf/rng.hpp"
#include "cvf/rupture.hpp"
#include "cvf/solver/classical.hpp"
#include "cvf/solver/gcs.hpp"
#include "cvf/solver/rollout.hpp"
#include "cvf/train/config.hpp"
#include "cvf/train/fit.hpp"
#include "cvf/train/loss.hpp"
#include "cvf/train/sampling.hpp"
#include "cvf/train/schedule.hpp"
