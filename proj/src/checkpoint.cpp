#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "vibronic/heom.hpp"

namespace vibronic {

namespace {

constexpr std::array<char, 8> kMagic = {'V', 'I', 'B', 'H', 'E', 'O', 'M', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> bytes;
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(bytes.data(), bytes.size());
}

void put_u32(std::ostream& os, std::uint32_t v) {
    std::array<char, 4> bytes;
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(bytes.data(), bytes.size());
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> bytes{};
    if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
        throw std::runtime_error("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> bytes{};
    if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
        throw std::runtime_error("checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace

void write_checkpoint(const AdoHierarchy& state, std::ostream& os) {
    os.write(kMagic.data(), kMagic.size());
    put_u32(os, static_cast<std::uint32_t>(state.layout().n_modes()));
    put_u32(os, static_cast<std::uint32_t>(state.layout().depth()));
    put_u32(os, static_cast<std::uint32_t>(state.dim()));
    put_u32(os, state.scaled() ? 1u : 0u);
    put_u64(os, state.n_ados());
    put_f64(os, state.time());
    for (const cplx& z : state.data()) {
        put_f64(os, z.real());
        put_f64(os, z.imag());
    }
    if (!os) throw std::runtime_error("checkpoint: write failed");
}

void write_checkpoint(const AdoHierarchy& state, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
    write_checkpoint(state, os);
}

AdoHierarchy read_checkpoint(std::istream& is, std::size_t cap) {
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic)
        throw std::runtime_error("checkpoint: bad magic");
    const auto n_modes = static_cast<int>(get_u32(is));
    const auto depth = static_cast<int>(get_u32(is));
    const auto dim = static_cast<int>(get_u32(is));
    const bool scaled = get_u32(is) != 0;
    const std::uint64_t n_ados = get_u64(is);
    const double time = get_f64(is);

    auto layout = enumerate_hierarchy(n_modes, depth, cap);
    if (layout->size() != n_ados) throw std::runtime_error("checkpoint: ADO count does not match header");
    AdoHierarchy state(std::move(layout), dim, time, scaled);
    for (cplx& z : state.data()) {
        const double re = get_f64(is);
        const double im = get_f64(is);
        z = {re, im};
    }
    return state;
}

AdoHierarchy read_checkpoint(const std::string& path, std::size_t cap) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    return read_checkpoint(is, cap);
}

}  // namespace vibronic
