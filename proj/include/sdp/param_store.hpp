#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "sdp/rng.hpp"
#include "sdp/tensor.hpp"

namespace sdp {

// Weight initialization kinds. He draws from N(0, 2 / fan_in) where fan_in is
// the product of all dims but the first; zero is used for biases and for the
// modulation projections.
enum class Init { he, zero };

struct ParamSpec {
    std::string name;
    Shape shape;
    Init init = Init::he;
};

// Named parameter collection. std::map keeps iteration order deterministic.
template <typename T>
class ParamStore {
  public:
    void add(const std::string& name, Tensor<T> value) {
        if (params_.count(name)) throw ConfigError("duplicate parameter: " + name);
        params_.emplace(name, std::move(value));
    }

    Tensor<T>& at(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
        return it->second;
    }
    const Tensor<T>& at(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
        return it->second;
    }

    bool contains(const std::string& name) const { return params_.count(name) != 0; }
    size_t size() const { return params_.size(); }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    int64_t total_elements() const {
        int64_t n = 0;
        for (const auto& [_, t] : params_) n += t.size();
        return n;
    }

    // zero-valued clone with identical names/shapes (gradient accumulators)
    ParamStore<T> zeros_like() const {
        ParamStore<T> out;
        for (const auto& [name, t] : params_) out.add(name, Tensor<T>(t.shape));
        return out;
    }

  private:
    std::map<std::string, Tensor<T>> params_;
};

// Deterministic per (seed, spec). Each parameter gets its own RNG stream keyed
// by name, so adding parameters never reshuffles the others.
template <typename T>
ParamStore<T> init_params(uint64_t seed, const std::vector<ParamSpec>& specs) {
    ParamStore<T> store;
    for (const auto& spec : specs) {
        Tensor<T> t(spec.shape);
        if (spec.init == Init::he) {
            int64_t fan_in = 1;
            for (size_t i = 1; i < spec.shape.size(); ++i) fan_in *= spec.shape[i];
            const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
            Rng rng(mix_seed({seed, hash_str(spec.name.c_str())}));
            for (auto& v : t.data) v = static_cast<T>(stddev * rng.normal());
        }
        store.add(spec.name, std::move(t));
    }
    return store;
}

// ---------------------------------------------------------------------------
// Serialization: "PRM1" container, name -> (dtype, shape, LE payload).
// Round-trips bit-exactly.
// ---------------------------------------------------------------------------

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "parameter files assume a little-endian host");

template <typename T> constexpr uint8_t dtype_tag();
template <> constexpr uint8_t dtype_tag<float>() { return 1; }
template <> constexpr uint8_t dtype_tag<double>() { return 2; }

inline void put_u32(std::ostream& os, uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}
inline uint32_t get_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

} // namespace detail

template <typename T>
void save_params(const ParamStore<T>& store, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write("PRM1", 4);
    detail::put_u32(os, static_cast<uint32_t>(store.size()));
    for (const auto& [name, t] : store) {
        detail::put_u32(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        const uint8_t tag = detail::dtype_tag<T>();
        os.write(reinterpret_cast<const char*>(&tag), 1);
        detail::put_u32(os, static_cast<uint32_t>(t.shape.size()));
        for (int d : t.shape) detail::put_u32(os, static_cast<uint32_t>(d));
        os.write(reinterpret_cast<const char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * sizeof(T)));
    }
    if (!os) throw IoError("write failed: " + path);
}

template <typename T>
ParamStore<T> load_params(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "PRM1", 4) != 0)
        throw FormatError(path + ": not a parameter file");
    const uint32_t count = detail::get_u32(is);
    ParamStore<T> store;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = detail::get_u32(is);
        if (!is || name_len > 4096) throw FormatError(path + ": corrupt entry name");
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        uint8_t tag = 0;
        is.read(reinterpret_cast<char*>(&tag), 1);
        if (tag != detail::dtype_tag<T>())
            throw FormatError(path + ": dtype mismatch for " + name);
        const uint32_t ndim = detail::get_u32(is);
        if (!is || ndim > 8) throw FormatError(path + ": corrupt shape");
        Shape shape(ndim);
        for (auto& d : shape) d = static_cast<int>(detail::get_u32(is));
        Tensor<T> t(shape);
        is.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(T)));
        if (!is) throw FormatError(path + ": truncated payload for " + name);
        store.add(name, std::move(t));
    }
    return store;
}

} // namespace sdp
