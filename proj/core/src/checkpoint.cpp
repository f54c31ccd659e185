#include "geomnet/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <vector>

#include "geomnet/errors.hpp"

namespace geomnet {

namespace {

constexpr char kMagic[4] = {'G', 'E', 'O', '1'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint32_t kTensorCount = 10;

void append_u16_le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void append_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_f64_le(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

struct Reader {
    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) const {
        if (pos + n > buf.size()) {
            throw FormatError(std::string("truncated checkpoint while reading ") + what, pos);
        }
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return buf[pos++];
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = static_cast<std::uint16_t>(buf[pos] | (buf[pos + 1] << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
        pos += 8;
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
};

void append_tensor(std::vector<std::uint8_t>& out, const Tensor& t) {
    out.push_back(static_cast<std::uint8_t>(t.shape().rank()));
    for (int i = 0; i < t.shape().rank(); ++i) {
        append_u32_le(out, static_cast<std::uint32_t>(t.shape().dim(i)));
    }
    for (std::int64_t i = 0; i < t.size(); ++i) append_f64_le(out, t[i]);
}

Tensor read_tensor(Reader& r, const Shape& expected, const char* name) {
    const std::uint8_t rank = r.u8("tensor rank");
    if (rank != expected.rank()) {
        throw FormatError(std::string("tensor ") + name + ": rank " + std::to_string(rank) +
                          " does not match expected " + expected.str(),
                          r.pos - 1);
    }
    std::vector<std::int64_t> dims(rank);
    for (auto& d : dims) d = r.u32("tensor dim");
    for (auto d : dims) {
        if (d < 1) {
            throw FormatError(std::string("tensor ") + name + ": bad dim " + std::to_string(d),
                              r.pos);
        }
    }
    const Shape shape(dims);
    if (shape != expected) {
        throw FormatError(std::string("tensor ") + name + ": shape " + shape.str() +
                          " does not match expected " + expected.str(),
                          r.pos);
    }
    Tensor t(shape);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = r.f64("tensor values");
    return t;
}

}  // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
    if (model.plan != lenet5_plan()) {
        throw ContractError("only the 28x28 topology is serialized");
    }
    std::vector<std::uint8_t> buf;
    buf.insert(buf.end(), kMagic, kMagic + 4);
    buf.push_back(kVersion);
    buf.push_back(model.config.activation == Activation::relu ? 0 : 1);
    append_u16_le(buf, static_cast<std::uint16_t>(model.config.num_classes));
    append_u32_le(buf, kTensorCount);
    for (const auto& layer : model.layers) {
        append_tensor(buf, layer.w);
        append_tensor(buf, layer.b);
    }
    const auto crc =
        static_cast<std::uint32_t>(crc32(0L, buf.data(), static_cast<uInt>(buf.size())));
    append_u32_le(buf, crc);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing", 0);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw FormatError("write failed for " + path.string(), 0);
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string(), 0);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

    if (buf.size() < 16) throw FormatError("checkpoint too short", buf.size());
    if (std::memcmp(buf.data(), kMagic, 4) != 0) throw FormatError("bad checkpoint magic", 0);

    const std::size_t body = buf.size() - 4;
    std::uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i) {
        stored_crc |= static_cast<std::uint32_t>(buf[body + static_cast<std::size_t>(i)])
                      << (8 * i);
    }
    const auto actual_crc =
        static_cast<std::uint32_t>(crc32(0L, buf.data(), static_cast<uInt>(body)));
    if (stored_crc != actual_crc) {
        throw FormatError("checkpoint CRC mismatch", body);
    }

    Reader r{buf, 4};
    const std::uint8_t version = r.u8("version");
    if (version != kVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
    }
    const std::uint8_t act_tag = r.u8("activation tag");
    if (act_tag > 1) throw FormatError("bad activation tag " + std::to_string(act_tag), 5);
    const std::uint16_t num_classes = r.u16("num_classes");
    if (num_classes < 2) throw FormatError("bad num_classes " + std::to_string(num_classes), 6);
    const std::uint32_t tensor_count = r.u32("tensor count");
    if (tensor_count != kTensorCount) {
        throw FormatError("expected " + std::to_string(kTensorCount) + " tensors, got " +
                          std::to_string(tensor_count),
                          8);
    }

    ModelConfig config;
    config.activation = act_tag == 0 ? Activation::relu : Activation::tanh;
    config.num_classes = num_classes;

    // Build a fresh model to get the expected shape table, then overwrite
    // its parameters with the stored tensors.
    Model model = build_model(config, lenet5_plan());
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        model.layers[i].w = read_tensor(r, model.layers[i].w.shape(), kLayerNames[i]);
        model.layers[i].b = read_tensor(r, model.layers[i].b.shape(), kLayerNames[i]);
        model.layers[i].vw = Tensor(model.layers[i].w.shape());
        model.layers[i].vb = Tensor(model.layers[i].b.shape());
    }
    if (r.pos != body) {
        throw FormatError("unexpected trailing bytes in checkpoint", r.pos);
    }
    return model;
}

}  // namespace geomnet
