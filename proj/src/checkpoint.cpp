#include "tcco/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace tcco::nn {

namespace {

static_assert(sizeof(double) == 8);

void write_f64_le(std::ostream& os, const double* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(data),
                 static_cast<std::streamsize>(n * 8));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, &data[i], 8);
            char buf[8];
            for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
            os.write(buf, 8);
        }
    }
}

void read_f64_le(std::istream& is, double* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * 8));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            char buf[8];
            is.read(buf, 8);
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b)
                bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[b]))
                        << (8 * b);
            std::memcpy(&data[i], &bits, 8);
        }
    }
    if (!is) throw std::runtime_error("checkpoint: truncated payload");
}

}  // namespace

void save_checkpoint(const std::string& path, std::span<Param* const> params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
    os << "TCCO-CKPT v1\n";
    os << "count " << params.size() << "\n";
    for (const Param* p : params)
        os << p->name << " " << p->value.rows << " " << p->value.cols << "\n";
    os << "---\n";
    for (const Param* p : params) write_f64_le(os, p->value.v.data(), p->value.size());
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

std::map<std::string, Tensor> read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line != "TCCO-CKPT v1")
        throw std::runtime_error("checkpoint: bad header in " + path);
    if (!std::getline(is, line)) throw std::runtime_error("checkpoint: missing count");
    std::size_t count = 0;
    {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag >> count;
        if (tag != "count") throw std::runtime_error("checkpoint: missing count");
    }
    std::vector<std::pair<std::string, std::pair<int, int>>> entries;
    entries.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(is, line)) throw std::runtime_error("checkpoint: short header");
        std::istringstream ss(line);
        std::string name;
        int r = 0, c = 0;
        ss >> name >> r >> c;
        if (name.empty() || r <= 0 || c <= 0)
            throw std::runtime_error("checkpoint: bad array entry: " + line);
        entries.emplace_back(name, std::make_pair(r, c));
    }
    if (!std::getline(is, line) || line != "---")
        throw std::runtime_error("checkpoint: missing separator");
    std::map<std::string, Tensor> out;
    for (auto& [name, shape] : entries) {
        Tensor t(shape.first, shape.second);
        read_f64_le(is, t.v.data(), t.size());
        out.emplace(name, std::move(t));
    }
    return out;
}

void load_checkpoint(const std::string& path, std::span<Param* const> params) {
    std::map<std::string, Tensor> arrays = read_checkpoint(path);
    for (Param* p : params) {
        auto it = arrays.find(p->name);
        if (it == arrays.end())
            throw std::runtime_error("checkpoint: missing array " + p->name);
        if (it->second.rows != p->value.rows || it->second.cols != p->value.cols)
            throw std::runtime_error("checkpoint: shape mismatch for " + p->name);
        p->value = std::move(it->second);
    }
}

}  // namespace tcco::nn
