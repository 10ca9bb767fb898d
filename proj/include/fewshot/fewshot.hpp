#pragma once

#include "fewshot/activations.hpp"
#include "fewshot/adam.hpp"
#include "fewshot/augment.hpp"
#include "fewshot/baseline.hpp"
#include "fewshot/checkpoint.hpp"
#include "fewshot/config.hpp"
#include "fewshot/dense.hpp"
#include "fewshot/episode.hpp"
#include "fewshot/error.hpp"
#include "fewshot/gesture.hpp"
#include "fewshot/gsjl.hpp"
#include "fewshot/loss.hpp"
#include "fewshot/lstm.hpp"
#include "fewshot/relation_net.hpp"
#include "fewshot/rng.hpp"
#include "fewshot/synthetic.hpp"
#include "fewshot/tensor.hpp"
#include "fewshot/training.hpp"
