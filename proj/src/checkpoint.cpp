#include "partclass/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "partclass/error.hpp"
#include "partclass/strfmt.hpp"

namespace partclass {

namespace {

constexpr char magic[4] = {'M', 'C', 'L', 'S'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

void put_str(std::string& out, std::string_view s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

class Reader {
  public:
    explicit Reader(std::string data) : data_(std::move(data)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    std::string str() {
        const std::uint32_t len = u32();
        need(len);
        std::string s = data_.substr(pos_, len);
        pos_ += len;
        return s;
    }

    void raw(char* dst, std::size_t len) {
        need(len);
        std::memcpy(dst, data_.data() + pos_, len);
        pos_ += len;
    }

    bool at_end() const { return pos_ == data_.size(); }

  private:
    void need(std::size_t len) {
        if (pos_ + len > data_.size()) fail(errc::bad_checkpoint, "truncated checkpoint");
    }
    std::string data_;
    std::size_t pos_ = 0;
};

const std::string& kv_at(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) fail(errc::bad_checkpoint, "config key '" + key + "' missing");
    return it->second;
}

std::string config_block(ClassifierModel& model, const CheckpointMeta& meta) {
    std::string block;
    for (const auto& [k, v] : model.config_kv()) block += k + "=" + v + "\n";
    block += "meta.seed=" + std::to_string(meta.seed) + "\n";
    block += "meta.epochs=" + std::to_string(meta.epochs) + "\n";
    block += "meta.final_loss=" + format_double(meta.final_loss) + "\n";
    return block;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, ClassifierModel& model,
                     const CheckpointMeta& meta) {
    std::string out;
    out.append(magic, 4);
    put_u32(out, checkpoint_version);
    put_str(out, model.arch());
    put_str(out, config_block(model, meta));

    std::vector<nd::NamedTensor> tensors = model.parameters();
    for (const auto& buffer : model.state_buffers()) tensors.push_back(buffer);
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        put_str(out, t.name);
        put_u32(out, static_cast<std::uint32_t>(t.tensor->rank()));
        for (const std::size_t d : t.tensor->shape()) put_u64(out, d);
        for (std::size_t i = 0; i < t.tensor->size(); ++i) put_f64(out, (*t.tensor)[i]);
    }

    std::ofstream file(path, std::ios::binary);
    if (!file) fail(errc::io_failure, "cannot open " + path.string() + " for writing");
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) fail(errc::io_failure, "short write to " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) fail(errc::missing_file, "cannot open checkpoint " + path.string());
    std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    Reader r(std::move(data));

    char got_magic[4];
    r.raw(got_magic, 4);
    if (std::memcmp(got_magic, magic, 4) != 0)
        fail(errc::bad_checkpoint, "bad magic in " + path.string());
    const std::uint32_t version = r.u32();
    if (version != checkpoint_version)
        fail(errc::bad_checkpoint, "unsupported version " + std::to_string(version));

    const std::string arch = r.str();
    const std::string config = r.str();

    std::map<std::string, std::string> kv;
    std::size_t pos = 0;
    while (pos < config.size()) {
        std::size_t eol = config.find('\n', pos);
        if (eol == std::string::npos) eol = config.size();
        const std::string line = config.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(errc::bad_checkpoint, "malformed config line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }

    LoadedCheckpoint out;
    out.meta.seed = parse_u64(kv_at(kv, "meta.seed"), errc::bad_checkpoint, "meta.seed");
    out.meta.epochs = static_cast<std::uint32_t>(
        parse_u64(kv_at(kv, "meta.epochs"), errc::bad_checkpoint, "meta.epochs"));
    out.meta.final_loss =
        parse_double(kv_at(kv, "meta.final_loss"), errc::bad_checkpoint, "meta.final_loss");
    kv.erase("meta.seed");
    kv.erase("meta.epochs");
    kv.erase("meta.final_loss");

    out.model = make_model(arch, kv);

    std::vector<nd::NamedTensor> tensors = out.model->parameters();
    for (const auto& buffer : out.model->state_buffers()) tensors.push_back(buffer);
    std::map<std::string, nd::Tensor*> by_name;
    for (const auto& t : tensors) by_name[t.name] = t.tensor;

    const std::uint32_t count = r.u32();
    if (count != tensors.size())
        fail(errc::bad_checkpoint, "tensor count " + std::to_string(count) + " != expected " +
                                       std::to_string(tensors.size()));
    std::set<std::string> seen;
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::string name = r.str();
        const auto it = by_name.find(name);
        if (it == by_name.end())
            fail(errc::bad_checkpoint, "unexpected tensor '" + name + "' for arch " + arch);
        if (!seen.insert(name).second)
            fail(errc::bad_checkpoint, "tensor '" + name + "' repeats");
        const std::uint32_t rank = r.u32();
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(r.u64());
        if (shape != it->second->shape())
            fail(errc::bad_checkpoint, "shape mismatch for tensor '" + name + "'");
        for (std::size_t i = 0; i < it->second->size(); ++i) (*it->second)[i] = r.f64();
    }
    if (!r.at_end()) fail(errc::bad_checkpoint, "trailing bytes in " + path.string());
    return out;
}

}  // namespace partclass
