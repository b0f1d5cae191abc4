#include "mfnet/spectral.hpp"

namespace mfnet {

const char* to_string(LoadingState state) {
    switch (state) {
    case LoadingState::Orthonormal:
        return "orthonormal";
    case LoadingState::Rotated:
        return "rotated";
    case LoadingState::SumToOne:
        return "sum_to_one";
    }
    return "orthonormal";
}

std::vector<std::string> hub_labels(const std::string& prefix, Index r) {
    std::vector<std::string> labels;
    for (Index k = 0; k < r; ++k) {
        labels.push_back(prefix + std::to_string(k + 1));
    }
    return labels;
}

LoadingMatrix top_loadings(const Spectrum& spectrum, Index r, const std::vector<std::string>& entities,
                           const std::string& hub_prefix) {
    const Index n = spectrum.eigenvectors.rows();
    if (r < 1 || r > n) {
        fail(errc::out_of_range, "r = " + std::to_string(r) + " outside 1.." + std::to_string(n));
    }
    if (static_cast<Index>(entities.size()) != n) {
        fail(errc::invalid, "entity labels do not match loading rows");
    }
    LoadingMatrix q;
    q.values = spectrum.eigenvectors.leftCols(r);
    q.state = LoadingState::Orthonormal;
    q.entities = entities;
    q.hubs = hub_labels(hub_prefix, r);
    return q;
}

}  // namespace mfnet
