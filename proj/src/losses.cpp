#include "gpga/losses.hpp"

#include <cmath>

namespace gpga {

std::string to_string(SimilarityMetric m) {
    switch (m) {
        case SimilarityMetric::Cosine: return "cosine";
        case SimilarityMetric::NegL1: return "neg-l1";
        case SimilarityMetric::NegL2: return "neg-l2";
    }
    return "cosine";
}

SimilarityMetric metric_from_string(const std::string& s) {
    if (s == "cosine") return SimilarityMetric::Cosine;
    if (s == "neg-l1") return SimilarityMetric::NegL1;
    if (s == "neg-l2") return SimilarityMetric::NegL2;
    throw ContractViolation("unknown similarity metric: " + s);
}

Tensor one_hot(std::size_t label, std::size_t n) {
    require(label < n, "one_hot: label out of range");
    Tensor t = Tensor::zeros({n});
    t.data[label] = 1.0;
    return t;
}

LabelDistribution smooth_labels(const Tensor& one_hot_y, double delta) {
    require(delta >= 0.0 && delta <= 1.0, "smooth_labels: delta must lie in [0, 1]");
    const std::size_t n = one_hot_y.size();
    require(n >= 2, "smooth_labels: need at least 2 classes");
    const double off = delta / static_cast<double>(n - 1);
    LabelDistribution d;
    d.delta = delta;
    d.probs = one_hot_y;
    for (auto& p : d.probs.data) p = (1.0 - delta - off) * p + off;
    return d;
}

NodePtr cross_entropy(NodePtr logits, const Tensor& target_probs) {
    require(logits->value.size() == target_probs.size(), "cross_entropy: size mismatch");
    auto target = Node::leaf(Tensor(logits->value.shape, target_probs.data));
    return neg(sum_all(mul(target, log_softmax(std::move(logits)))));
}

NodePtr cw_margin(NodePtr logits, std::size_t true_class) {
    const std::size_t n = logits->value.size();
    require(n >= 2, "cw_margin: need at least 2 classes");
    require(true_class < n, "cw_margin: class index out of range");
    std::size_t best = true_class == 0 ? 1 : 0;
    for (std::size_t j = 0; j < n; ++j)
        if (j != true_class && logits->value.data[j] > logits->value.data[best]) best = j;
    auto top_other = gather(logits, best);
    auto own = gather(std::move(logits), true_class);
    return sub(std::move(top_other), std::move(own));
}

NodePtr similarity(NodePtr a, NodePtr b, SimilarityMetric metric) {
    require(a->value.size() == b->value.size(), "similarity: length mismatch");
    switch (metric) {
        case SimilarityMetric::Cosine: {
            // Epsilon guard: a degenerate (all-zero) logit vector yields
            // similarity 0 and a bounded gradient instead of aborting.
            auto denom = mul(l2norm(a), l2norm(b));
            return div_scalar(dotn(std::move(a), std::move(b)), std::move(denom), 1e-12);
        }
        case SimilarityMetric::NegL1:
            return neg(sum_all(absn(sub(std::move(a), std::move(b)))));
        case SimilarityMetric::NegL2:
            return neg(l2norm(sub(std::move(a), std::move(b))));
    }
    throw ContractViolation("similarity: bad metric");
}

NodePtr contrastive_directional(const LogitTriple& t, SimilarityMetric metric) {
    require(t.u->value.size() == t.v->value.size() && t.u->value.size() == t.z->value.size(),
            "contrastive_directional: logit length mismatch");
    auto s_uz = similarity(t.u, t.z, metric);
    auto s_vu = similarity(t.v, t.u, metric);
    // -log( e^s_uz / (e^s_vu + e^s_uz) ) = log(e^s_vu + e^s_uz) - s_uz
    auto lse = logn(add(expn(s_vu), expn(s_uz)));
    return sub(std::move(lse), std::move(s_uz));
}

std::pair<Tensor, Tensor> analytic_grad_lcd(const Tensor& u, const Tensor& v, const Tensor& z) {
    const std::size_t n = u.size();
    require(v.size() == n && z.size() == n, "analytic_grad_lcd: length mismatch");
    const double nu = l2_norm(u), nv = l2_norm(v), nz = l2_norm(z);
    require(nu > 0.0 && nv > 0.0 && nz > 0.0, "analytic_grad_lcd: zero vector");
    Tensor up = u, vp = v, zp = z;
    for (auto& x : up.data) x /= nu;
    for (auto& x : vp.data) x /= nv;
    for (auto& x : zp.data) x /= nz;
    const double s_vu = dot(vp, up), s_uz = dot(up, zp);
    const double denom = std::exp(s_vu) + std::exp(s_uz);
    const double factor = std::exp(s_vu) / denom;

    // grad_u = -(exp(s_vu)/denom) * (I - u'u'^T)(z' - v') / |u|
    // The projection applied to a vector w is w - (u'.w) u'.
    Tensor grad_u = Tensor::zeros({n});
    {
        Tensor w = Tensor::zeros({n});
        for (std::size_t i = 0; i < n; ++i) w.data[i] = zp.data[i] - vp.data[i];
        const double proj = dot(up, w);
        for (std::size_t i = 0; i < n; ++i) grad_u.data[i] = -factor * (w.data[i] - proj * up.data[i]) / nu;
    }

    // grad_z = -(exp(s_vu)/denom) * (I - z'z'^T) u' / |z|
    Tensor grad_z = Tensor::zeros({n});
    {
        const double proj = dot(zp, up);
        for (std::size_t i = 0; i < n; ++i) grad_z.data[i] = -factor * (up.data[i] - proj * zp.data[i]) / nz;
    }
    return {std::move(grad_u), std::move(grad_z)};
}

NodePtr normalized_cross_entropy(NodePtr u, NodePtr z, const Tensor& one_hot_y) {
    require(u->value.size() == z->value.size(), "normalized_cross_entropy: length mismatch");
    require(one_hot_y.size() == u->value.size(), "normalized_cross_entropy: label length mismatch");
    auto norm_u = l2norm(u);
    // Epsilon guard keeps I finite when u degenerates to (near) zero.
    auto rescaled = div_scalar(mul(std::move(u), std::move(z)), std::move(norm_u), 1e-12);
    return cross_entropy(std::move(rescaled), one_hot_y);
}

NodePtr match_and_deceive(const LogitTriple& t, const Tensor& one_hot_y, SimilarityMetric metric) {
    auto nce = normalized_cross_entropy(t.u, t.z, one_hot_y);
    auto lcd = contrastive_directional(t, metric);
    return sub(std::move(nce), std::move(lcd));
}

NodePtr kl_divergence_logits(NodePtr a, NodePtr b) {
    require(a->value.same_shape(b->value), "kl_divergence_logits: shape mismatch");
    auto p = softmax(a);
    auto diff = sub(log_softmax(std::move(a)), log_softmax(std::move(b)));
    return sum_all(mul(std::move(p), std::move(diff)));
}

}  // namespace gpga
