#include "maptrace/unet.hpp"

#include <cstring>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

namespace maptrace {

namespace {

constexpr char kMagic[8] = {'M', 'T', 'C', 'K', '0', '0', '0', '1'};

}  // namespace

void save_checkpoint(UNet<float>& net, const std::filesystem::path& path) {
    using nlohmann::json;
    json header;
    header["config"] = {
        {"in_channels", net.config().in_channels},
        {"num_classes", net.config().num_classes},
        {"base_width", net.config().base_width},
        {"depth", net.config().depth},
    };
    json dir = json::array();
    std::vector<Tensor*> tensors;
    uint64_t offset = 0;
    auto add = [&](const std::string& name, Tensor* t) {
        dir.push_back({{"name", name},
                       {"shape", {t->n, t->c, t->h, t->w}},
                       {"offset", offset}});
        tensors.push_back(t);
        offset += t->size() * sizeof(float);
    };
    for (auto& p : net.parameters()) add(p.name, p.value);
    for (auto& s : net.state()) add(s.name, s.value);
    header["tensors"] = std::move(dir);
    const std::string htext = header.dump();

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), "checkpoint: cannot open " + tmp.string() + " for writing");
        out.write(kMagic, sizeof(kMagic));
        const uint64_t hlen = htext.size();
        out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
        out.write(htext.data(), (std::streamsize)htext.size());
        for (Tensor* t : tensors)
            out.write(reinterpret_cast<const char*>(t->data.data()),
                      (std::streamsize)(t->size() * sizeof(float)));
        require(out.good(), "checkpoint: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

UNet<float> load_checkpoint(const std::filesystem::path& path) {
    using nlohmann::json;
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "checkpoint: cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    require(in.good() && std::memcmp(magic, kMagic, 8) == 0,
            "checkpoint: bad magic in " + path.string());
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string htext(hlen, '\0');
    in.read(htext.data(), (std::streamsize)hlen);
    require(in.good(), "checkpoint: truncated header in " + path.string());
    const json header = json::parse(htext);

    UNetConfig cfg;
    cfg.in_channels = header["config"]["in_channels"];
    cfg.num_classes = header["config"]["num_classes"];
    cfg.base_width = header["config"]["base_width"];
    cfg.depth = header["config"]["depth"];
    UNet<float> net(cfg);

    std::unordered_map<std::string, Tensor*> by_name;
    for (auto& p : net.parameters()) by_name[p.name] = p.value;
    for (auto& s : net.state()) by_name[s.name] = s.value;

    for (const auto& entry : header["tensors"]) {
        const std::string name = entry["name"];
        auto it = by_name.find(name);
        require(it != by_name.end(), "checkpoint: unknown tensor " + name);
        Tensor* t = it->second;
        const auto& sh = entry["shape"];
        require(sh[0] == t->n && sh[1] == t->c && sh[2] == t->h && sh[3] == t->w,
                "checkpoint: shape mismatch for " + name);
        in.seekg((std::streamoff)(sizeof(kMagic) + sizeof(uint64_t) + hlen +
                                  (uint64_t)entry["offset"]));
        in.read(reinterpret_cast<char*>(t->data.data()),
                (std::streamsize)(t->size() * sizeof(float)));
        require(in.good(), "checkpoint: truncated data for " + name);
    }
    return net;
}

}  // namespace maptrace
