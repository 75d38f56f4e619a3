#pragma once

#include <map>
#include <string>

#include "sdp/cube.hpp"
#include "sdp/param_store.hpp"
#include "sdp/tape.hpp"

namespace sdp {

// Lazily binds store entries to tape leaves so a model forward can be written
// against parameter names. After backward(), grads() gathers the accumulated
// gradients per bound name.
template <typename T>
class ParamRefs {
  public:
    ParamRefs(Tape<T>& tape, const ParamStore<T>& store, bool trainable)
        : tape_(&tape), store_(&store), trainable_(trainable) {}

    typename Tape<T>::Ref operator[](const std::string& name) {
        auto it = refs_.find(name);
        if (it != refs_.end()) return it->second;
        auto ref = tape_->leaf(store_->at(name), trainable_);
        refs_.emplace(name, ref);
        return ref;
    }

    // accumulate d(loss)/d(param) into out (names missing from the tape are
    // left untouched; a parameter not used by the graph has zero gradient)
    void grads(ParamStore<T>& out) const {
        for (const auto& [name, ref] : refs_) {
            if (!tape_->needs_grad(ref)) continue;
            const Tensor<T>& g = tape_->grad(ref);
            if (g.size() == 0) continue;
            Tensor<T>& dst = out.at(name);
            for (int64_t i = 0; i < g.size(); ++i) dst[i] += g[i];
        }
    }

  private:
    Tape<T>* tape_;
    const ParamStore<T>* store_;
    bool trainable_;
    std::map<std::string, typename Tape<T>::Ref> refs_;
};

template <typename T>
Tensor<T> cube_to_tensor(const SpectralCube& cube) {
    Tensor<T> t(Shape{cube.bands, cube.height, cube.width});
    for (size_t i = 0; i < cube.data.size(); ++i) t.data[i] = static_cast<T>(cube.data[i]);
    return t;
}

// channel-axis concatenation of two cubes with matching spatial dims
template <typename T>
Tensor<T> concat_cubes(const SpectralCube& a, const SpectralCube& b) {
    if (!same_dims(a, b)) throw ShapeError("concat_cubes: dims differ");
    Tensor<T> t(Shape{2 * a.bands, a.height, a.width});
    for (size_t i = 0; i < a.data.size(); ++i) t.data[i] = static_cast<T>(a.data[i]);
    for (size_t i = 0; i < b.data.size(); ++i)
        t.data[a.data.size() + i] = static_cast<T>(b.data[i]);
    return t;
}

template <typename T>
SpectralCube tensor_to_cube(const Tensor<T>& t) {
    if (t.shape.size() != 3) throw ShapeError("tensor_to_cube: expects CHW");
    SpectralCube cube(t.dim(1), t.dim(2), t.dim(0));
    for (size_t i = 0; i < cube.data.size(); ++i) cube.data[i] = static_cast<float>(t.data[i]);
    return cube;
}

} // namespace sdp
