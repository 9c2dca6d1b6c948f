#pragma once

#include <vector>

#include "tarslab/tensor.hpp"

// Frozen stand-ins for the visual and text encoders that score cross-modal
// token relevance. The policy has its own learned embeddings; this scorer is
// never updated during preference training.
namespace tarslab {

struct SceneObject {
    int object_id = -1;
    std::vector<double> feature;  // length d_raw
};

struct VisualScene {
    int scene_id = -1;
    std::vector<SceneObject> objects;
};

struct TokenSeq {
    std::vector<int> ids;
    std::vector<bool> special_mask;  // true for BOS/EOS/PAD/MASK positions

    std::size_t size() const { return ids.size(); }
};

struct EmbeddingTable {
    Tensor weights;  // V x d
};

// Row i = feature_i * proj, rows L2-normalized. Errors on an empty scene.
Tensor encode_visual(const VisualScene& scene, const Tensor& proj);

// Embedding lookup then row normalization.
Tensor encode_tokens(const TokenSeq& q, const EmbeddingTable& table);

// Raw cosine similarity matrix S = gv * gt^T (n x m). The negation used for
// lowest-alignment selection happens downstream.
Tensor relevance_matrix(const Tensor& gv, const Tensor& gt);

}  // namespace tarslab
