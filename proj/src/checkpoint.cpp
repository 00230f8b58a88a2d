#include "seaco/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace seaco {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace {
constexpr const char* kMagic = "SEACO-CKPT v1";
}

void save_checkpoint(const ParamStore& ps, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
    f << kMagic << "\n";
    // std::map iteration is already name-sorted.
    for (const auto& [name, e] : ps.all()) {
        const Tensor& t = e.node->value;
        f << name << " " << t.ndim();
        for (size_t d : t.shape) f << " " << d;
        f << "\n";
        std::vector<float> buf(t.size());
        for (size_t i = 0; i < t.size(); ++i) buf[i] = float(t.data[i]);
        f.write(reinterpret_cast<const char*>(buf.data()),
                std::streamsize(buf.size() * sizeof(float)));
    }
    if (!f) throw std::runtime_error("write failure on checkpoint: " + path);
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read checkpoint: " + path);
    std::string magic;
    std::getline(f, magic);
    if (magic != kMagic)
        throw std::runtime_error(path + ": bad checkpoint magic/version line \"" + magic +
                                 "\"");
    std::map<std::string, Tensor> out;
    std::string header;
    while (std::getline(f, header)) {
        if (header.empty()) continue;
        std::istringstream hs(header);
        std::string name;
        size_t ndim = 0;
        if (!(hs >> name >> ndim))
            throw std::runtime_error(path + ": malformed parameter header \"" + header +
                                     "\"");
        std::vector<size_t> shape(ndim);
        for (size_t i = 0; i < ndim; ++i)
            if (!(hs >> shape[i]))
                throw std::runtime_error(path + ": truncated shape for " + name);
        if (out.count(name))
            throw std::runtime_error(path + ": duplicate parameter " + name);
        Tensor t(shape);
        std::vector<float> buf(t.size());
        f.read(reinterpret_cast<char*>(buf.data()),
               std::streamsize(buf.size() * sizeof(float)));
        if (size_t(f.gcount()) != buf.size() * sizeof(float))
            throw std::runtime_error(path + ": truncated data for " + name + " at offset " +
                                     std::to_string(f.tellg()));
        for (size_t i = 0; i < t.size(); ++i) t.data[i] = double(buf[i]);
        out.emplace(name, std::move(t));
    }
    return out;
}

}  // namespace seaco
