#pragma once

#include <utility>

#include "gpga/autodiff.hpp"
#include "gpga/tensor.hpp"

namespace gpga {

// Class-probability target; delta == 0 means one-hot.
struct LabelDistribution {
    Tensor probs;
    double delta = 0.0;
};

enum class SimilarityMetric { Cosine, NegL1, NegL2 };

std::string to_string(SimilarityMetric m);
SimilarityMetric metric_from_string(const std::string& s);

// u = f(x~), v = f(x), z = h(x~), all logit vectors of equal length.
struct LogitTriple {
    NodePtr u, v, z;
};

Tensor one_hot(std::size_t label, std::size_t n);

// y-hat = (1 - delta - delta/(N-1)) * y + delta/(N-1): true class keeps
// 1 - delta, every other class gets delta/(N-1).
LabelDistribution smooth_labels(const Tensor& one_hot_y, double delta);

// -sum target_j * log softmax(logits)_j ; for a [B,N] batch the per-sample
// losses are summed (callers scale to a mean where needed).
NodePtr cross_entropy(NodePtr logits, const Tensor& target_probs);

// max_{j != y} logits_j - logits_y; positive iff misclassified.
NodePtr cw_margin(NodePtr logits, std::size_t true_class);

// cosine -> a.b/(|a||b|); neg-l1 -> -sum|a_i-b_i|; neg-l2 -> -|a-b|_2.
NodePtr similarity(NodePtr a, NodePtr b, SimilarityMetric metric);

// l_cd = -log[ exp(S(u,z)) / (exp(S(v,u)) + exp(S(u,z))) ]
NodePtr contrastive_directional(const LogitTriple& t, SimilarityMetric metric);

// Closed-form d l_cd / du and d l_cd / dz for the cosine metric; pure value
// computation used as a verification oracle against the autodiff path.
std::pair<Tensor, Tensor> analytic_grad_lcd(const Tensor& u, const Tensor& v, const Tensor& z);

// I(u,z) = (u o z) / |u|_2 ; l_nce = -sum y_j log softmax(I)_j.
NodePtr normalized_cross_entropy(NodePtr u, NodePtr z, const Tensor& one_hot_y);

// L_md = l_nce - l_cd; maximized by the guided attack.
NodePtr match_and_deceive(const LogitTriple& t, const Tensor& one_hot_y, SimilarityMetric metric);

// KL(softmax(a) || softmax(b)), rows summed; used by the Trades trainer.
NodePtr kl_divergence_logits(NodePtr a, NodePtr b);

}  // namespace gpga
