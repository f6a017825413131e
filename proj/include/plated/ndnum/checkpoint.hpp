#ifndef PLATED_NDNUM_CHECKPOINT_HPP
#define PLATED_NDNUM_CHECKPOINT_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "plated/error.hpp"
#include "plated/ndnum/params.hpp"
#include "plated/tensor.hpp"

namespace plated {

// Checkpoint container. Single file:
//   magic "PLTD", version u16, count u32, then per array:
//   name_len u16 + UTF-8 name, rank u8, dims u32 each, f32 payload.
// All integers and floats little-endian. Unknown versions are rejected.

inline constexpr std::uint16_t kCheckpointVersion = 1;

namespace detail {

inline void put_u16(std::ostream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}
inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}
inline std::uint16_t get_u16(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}
inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
inline float get_f32(std::istream& is) {
    std::uint32_t bits = get_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace detail

inline void save_arrays(const std::map<std::string, Tensor>& arrays, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    require(os.good(), "checkpoint: cannot open '" + path + "' for writing");
    os.write("PLTD", 4);
    detail::put_u16(os, kCheckpointVersion);
    detail::put_u32(os, static_cast<std::uint32_t>(arrays.size()));
    for (const auto& [name, t] : arrays) {
        require(name.size() <= 0xffff, "checkpoint: array name too long");
        detail::put_u16(os, static_cast<std::uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        require(t.rank() <= 0xff, "checkpoint: rank too large");
        os.put(static_cast<char>(t.rank()));
        for (std::size_t d : t.shape()) detail::put_u32(os, static_cast<std::uint32_t>(d));
        for (std::size_t i = 0; i < t.size(); ++i) detail::put_f32(os, static_cast<float>(t[i]));
    }
    require(os.good(), "checkpoint: write failed for '" + path + "'");
}

inline std::map<std::string, Tensor> load_arrays(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), "checkpoint: cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    require(is.good() && std::string(magic, 4) == "PLTD", "checkpoint: bad magic in '" + path + "'");
    const std::uint16_t version = detail::get_u16(is);
    require(version == kCheckpointVersion,
            "checkpoint: unknown format version " + std::to_string(version) + " in '" + path + "'");
    const std::uint32_t count = detail::get_u32(is);
    std::map<std::string, Tensor> out;
    for (std::uint32_t a = 0; a < count; ++a) {
        const std::uint16_t name_len = detail::get_u16(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const int rank = is.get();
        require(rank >= 0, "checkpoint: truncated file '" + path + "'");
        std::vector<std::size_t> shape;
        for (int d = 0; d < rank; ++d) shape.push_back(detail::get_u32(is));
        Tensor t(shape.empty() ? std::vector<std::size_t>{1} : shape);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<real>(detail::get_f32(is));
        require(is.good(), "checkpoint: truncated array '" + name + "' in '" + path + "'");
        require(out.emplace(std::move(name), std::move(t)).second,
                "checkpoint: duplicate array name in '" + path + "'");
    }
    return out;
}

inline void save_checkpoint(const ParamStore& params, const std::string& path) {
    save_arrays(params.snapshot_values(), path);
}

// Loads values into an already-built store; names and shapes must match.
inline void load_checkpoint(ParamStore& params, const std::string& path) {
    auto arrays = load_arrays(path);
    require(arrays.size() == params.count(),
            "checkpoint: array count mismatch (" + std::to_string(arrays.size()) + " in file, " +
                std::to_string(params.count()) + " in model)");
    for (auto& [name, t] : arrays) {
        Param& p = params.at(name);
        check_same_shape(p.value, t, "checkpoint load");
        p.value = std::move(t);
    }
}

}  // namespace plated

#endif  // PLATED_NDNUM_CHECKPOINT_HPP
