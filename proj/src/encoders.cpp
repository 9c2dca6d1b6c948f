#include "tarslab/encoders.hpp"

#include "tarslab/autodiff.hpp"

namespace tarslab {

Tensor encode_visual(const VisualScene& scene, const Tensor& proj) {
    if (scene.objects.empty()) fail_contract("encode_visual: scene has no objects");
    const std::size_t d_raw = proj.rows();
    Tensor feats({scene.objects.size(), d_raw});
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const auto& f = scene.objects[i].feature;
        if (f.size() != d_raw) {
            fail_contract("encode_visual: object feature length " + std::to_string(f.size()) +
                          " does not match projection rows " + std::to_string(d_raw));
        }
        std::copy(f.begin(), f.end(), feats.data() + i * d_raw);
    }
    return ag::l2_normalize_rows(ag::t_matmul(feats, proj));
}

Tensor encode_tokens(const TokenSeq& q, const EmbeddingTable& table) {
    return ag::l2_normalize_rows(ag::t_gather_rows(table.weights, q.ids));
}

Tensor relevance_matrix(const Tensor& gv, const Tensor& gt) {
    if (gv.cols() != gt.cols()) fail_dim("relevance_matrix", gv, gt);
    return ag::t_matmul(gv, ag::t_transpose(gt));
}

}  // namespace tarslab
