#include "medgrad/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <filesystem>

#include "medgrad/png.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace medgrad {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    put_u32(out, std::bit_cast<std::uint32_t>(f));
}

struct Reader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    void need(std::size_t n, const char* field) const {
        if (pos + n > bytes.size())
            throw FormatError(std::string("checkpoint truncated while reading ") + field);
    }
    std::uint32_t u32(const char* field) {
        need(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64(const char* field) {
        need(8, field);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    float f32(const char* field) { return std::bit_cast<float>(u32(field)); }
    std::string str(std::size_t n, const char* field) {
        need(n, field);
        std::string s(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
        pos += n;
        return s;
    }
};

json bundle_config_json(const ClipBundle& bundle) {
    json classes = json::array();
    for (const auto& c : bundle.classes) classes.push_back({{"name", c.name}, {"prompt", c.prompt}});
    return json{{"model", json::parse(bundle.model.cfg.to_json_string())},
                {"vocab", bundle.vocab.words()},
                {"classes", classes}};
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ClipBundle& bundle) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'M', 'G', 'E', 'C'});
    put_u32(out, kCheckpointVersion);

    const std::string config = bundle_config_json(bundle).dump();
    put_u32(out, static_cast<std::uint32_t>(config.size()));
    out.insert(out.end(), config.begin(), config.end());

    std::uint32_t count = 0;
    bundle.model.params.for_each([&](const std::string&, const Tensorf&) { ++count; });
    put_u32(out, count);
    bundle.model.params.for_each([&](const std::string& name, const Tensorf& t) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (auto d : t.shape) put_u64(out, d);
        for (float v : t.data) put_f32(out, v);
    });
    return out;
}

ClipBundle deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader r{bytes};
    const std::string magic = r.str(4, "magic");
    if (magic != "MGEC") throw FormatError("checkpoint: bad magic '" + magic + "'");
    const std::uint32_t version = r.u32("format_version");
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported format_version " + std::to_string(version));

    const std::uint32_t config_len = r.u32("config length");
    const std::string config_text = r.str(config_len, "config");
    json config;
    try {
        config = json::parse(config_text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint: config is not valid JSON: ") + e.what());
    }

    ClipBundle bundle;
    if (!config.contains("model")) throw FormatError("checkpoint: config missing 'model'");
    bundle.model = ClipModel::init(ModelConfig::from_json_string(config["model"].dump()), 0);

    if (config.contains("vocab")) {
        std::string vocab_text;
        for (const auto& w : config["vocab"]) vocab_text += w.get<std::string>() + "\n";
        bundle.vocab = Vocabulary::from_file_text(vocab_text);
    }
    if (config.contains("classes"))
        for (const auto& c : config["classes"])
            bundle.classes.push_back(
                {c.at("name").get<std::string>(), c.at("prompt").get<std::string>()});

    const std::uint32_t count = r.u32("tensor count");
    std::uint32_t seen = 0;
    bundle.model.params.for_each([&](const std::string& name, Tensorf& t) {
        if (seen++ >= count)
            throw FormatError("checkpoint: tensor table ended early at '" + name + "'");
        const std::uint32_t name_len = r.u32("tensor name length");
        const std::string stored = r.str(name_len, "tensor name");
        if (stored != name)
            throw FormatError("checkpoint: tensor '" + stored + "' where '" + name +
                              "' was expected");
        const std::uint32_t rank = r.u32("tensor rank");
        Shape shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(r.u64("tensor dim"));
        if (shape != t.shape)
            throw FormatError("checkpoint: tensor '" + name + "' has shape " + shape_str(shape) +
                              ", model expects " + shape_str(t.shape));
        for (auto& v : t.data) v = r.f32("tensor data");
    });
    if (seen != count)
        throw FormatError("checkpoint: tensor count " + std::to_string(count) +
                          " does not match model (" + std::to_string(seen) + ")");
    if (r.pos != bytes.size()) throw FormatError("checkpoint: trailing bytes after tensor table");
    return bundle;
}

void save_checkpoint(const ClipBundle& bundle, const std::string& path) {
    const auto bytes = serialize_checkpoint(bundle);
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const fs::path tmp = target.string() + ".tmp";
    write_file(tmp.string(), bytes);
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot move checkpoint into place: " + path + " (" + ec.message() + ")");
    }
}

ClipBundle load_checkpoint(const std::string& path) {
    return deserialize_checkpoint(read_file(path));
}

}  // namespace medgrad
