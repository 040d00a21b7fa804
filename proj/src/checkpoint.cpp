#include "vseg/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vseg {

namespace {

constexpr char kMagic[8] = {'V', 'C', 'K', 'P', '0', '0', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

struct Reader {
    const std::string& data;
    std::size_t pos = 0;
    const std::string& path;

    void need(std::size_t n) const {
        if (pos + n > data.size())
            throw std::runtime_error("checkpoint: truncated file " + path);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + static_cast<std::size_t>(i)]))
                 << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + static_cast<std::size_t>(i)]))
                 << (8 * i);
        pos += 8;
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s = data.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void write_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    const NetworkConfig& cfg = checkpoint.params.config();
    std::string data;
    data.append(kMagic, 8);
    put_u32(data, static_cast<std::uint32_t>(cfg.stages));
    put_u32(data, static_cast<std::uint32_t>(cfg.base_channels));
    put_u32(data, static_cast<std::uint32_t>(cfg.convs_per_stage));
    put_u32(data, static_cast<std::uint32_t>(cfg.kernel_size));
    put_f64(data, cfg.dropout_rate);
    put_u32(data, static_cast<std::uint32_t>(cfg.input_patch_size));

    put_u32(data, static_cast<std::uint32_t>(checkpoint.params.size()));
    for (const auto& p : checkpoint.params.items()) {
        put_u32(data, static_cast<std::uint32_t>(p.name.size()));
        data.append(p.name);
        put_u32(data, static_cast<std::uint32_t>(p.tensor.shape().size()));
        for (std::int64_t d : p.tensor.shape()) put_u64(data, static_cast<std::uint64_t>(d));
        for (float v : p.tensor.values()) put_f32(data, v);
    }

    if (checkpoint.optimizer.has_value()) {
        const OptimizerState& st = *checkpoint.optimizer;
        if (st.m.size() != checkpoint.params.size())
            throw std::invalid_argument("checkpoint: optimizer state does not match parameters");
        data.push_back(char(1));
        put_u64(data, static_cast<std::uint64_t>(st.step_count));
        for (std::size_t i = 0; i < st.m.size(); ++i) {
            for (float v : st.m[i]) put_f32(data, v);
            for (float v : st.v[i]) put_f32(data, v);
            for (float v : st.v_hat[i]) put_f32(data, v);
        }
    } else {
        data.push_back(char(0));
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("checkpoint: cannot write " + path);
    file.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!file) throw std::runtime_error("checkpoint: short write to " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    if (data.size() < 8 || std::memcmp(data.data(), kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);

    Reader r{data, 8, path};
    NetworkConfig cfg;
    cfg.stages = static_cast<int>(r.u32());
    cfg.base_channels = static_cast<int>(r.u32());
    cfg.convs_per_stage = static_cast<int>(r.u32());
    cfg.kernel_size = static_cast<int>(r.u32());
    cfg.dropout_rate = r.f64();
    cfg.input_patch_size = static_cast<int>(r.u32());
    cfg.validate();

    Checkpoint out;
    out.params = NetworkParameters(cfg);
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = r.u32();
        std::string name = r.str(name_len);
        const std::uint32_t rank = r.u32();
        Shape shape(rank);
        for (auto& d : shape) {
            d = static_cast<std::int64_t>(r.u64());
            if (d <= 0) throw std::runtime_error("checkpoint: non-positive shape in " + path);
        }
        const std::int64_t n = shape_numel(shape);
        std::vector<float> values(static_cast<std::size_t>(n));
        for (auto& v : values) v = r.f32();
        out.params.add(std::move(name),
                       Tensor::from_values(std::move(shape), std::move(values), true));
    }

    r.need(1);
    const bool has_optimizer = data[r.pos++] != 0;
    if (has_optimizer) {
        OptimizerState st;
        st.step_count = static_cast<std::int64_t>(r.u64());
        for (const auto& p : out.params.items()) {
            const std::size_t n = p.tensor.values().size();
            std::vector<float> m(n), v(n), vh(n);
            for (auto& x : m) x = r.f32();
            for (auto& x : v) x = r.f32();
            for (auto& x : vh) x = r.f32();
            st.m.push_back(std::move(m));
            st.v.push_back(std::move(v));
            st.v_hat.push_back(std::move(vh));
        }
        out.optimizer = std::move(st);
    }
    if (r.pos != data.size())
        throw std::runtime_error("checkpoint: trailing bytes in " + path);
    return out;
}

}  // namespace vseg
