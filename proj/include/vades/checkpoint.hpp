#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "vades/model.hpp"

namespace vades {

// Single-file checkpoint: 8-byte magic, version, a JSON metadata block
// (config, inventory, encoder config, author ids, epoch, rng state), then
// raw little-endian float64 parameter blobs in a fixed order. Parameters
// round-trip bit-exactly, so save -> load -> infer reproduces outputs.
inline constexpr char kCheckpointMagic[8] = {'V', 'A', 'D', 'E', 'S', 'C', 'P', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointInfo {
    TrainConfig config;
    int epoch = 0;
    std::string rng_state;
};

namespace detail {

inline void write_head_blobs(std::ostream& os, const DocHeads& h) {
    write_f64s(os, h.l1.w.data(), h.l1.w.size());
    write_f64s(os, h.l1.b.data(), h.l1.b.size());
    write_f64s(os, h.bn.gamma.data(), h.bn.gamma.size());
    write_f64s(os, h.bn.beta.data(), h.bn.beta.size());
    write_f64s(os, h.bn.running_mean.data(), h.bn.running_mean.size());
    write_f64s(os, h.bn.running_var.data(), h.bn.running_var.size());
    write_f64s(os, h.l2.w.data(), h.l2.w.size());
    write_f64s(os, h.l2.b.data(), h.l2.b.size());
}

inline void read_head_blobs(std::istream& is, DocHeads& h) {
    read_f64s(is, h.l1.w.data(), h.l1.w.size());
    read_f64s(is, h.l1.b.data(), h.l1.b.size());
    read_f64s(is, h.bn.gamma.data(), h.bn.gamma.size());
    read_f64s(is, h.bn.beta.data(), h.bn.beta.size());
    read_f64s(is, h.bn.running_mean.data(), h.bn.running_mean.size());
    read_f64s(is, h.bn.running_var.data(), h.bn.running_var.size());
    read_f64s(is, h.l2.w.data(), h.l2.w.size());
    read_f64s(is, h.l2.b.data(), h.l2.b.size());
}

} // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const VadesModel& model,
                            const CheckpointInfo& info) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw error("cannot write checkpoint: " + path.string());
    }
    nlohmann::json meta;
    meta["format_version"] = kCheckpointVersion;
    meta["config"] = info.config.to_json();
    meta["epoch"] = info.epoch;
    meta["rng_state"] = info.rng_state;
    meta["inventory"] = inventory_to_json(model.inventory);
    meta["encoder"] = model.enc_cfg.to_json();
    meta["author_ids"] = model.author_ids;
    meta["r"] = model.r();
    meta["r0"] = model.r0();
    const std::string meta_str = meta.dump();

    out.write(kCheckpointMagic, 8);
    write_le<std::uint32_t>(out, kCheckpointVersion);
    write_le<std::uint64_t>(out, meta_str.size());
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

    write_f64s(out, model.author_mu.data(), model.author_mu.size());
    write_f64s(out, model.author_logvar.data(), model.author_logvar.size());
    detail::write_head_blobs(out, model.f);
    detail::write_head_blobs(out, model.g);
    write_f64s(out, model.cp.v.data(), 4);
    if (model.enc_cfg.kind == EncoderConfig::Kind::Builtin) {
        write_f64s(out, model.table.rows.data(), model.table.rows.size());
    }
    write_f64s(out, model.standardizer.means.data(), model.standardizer.means.size());
    write_f64s(out, model.standardizer.stds.data(), model.standardizer.stds.size());
    for (auto m : model.standardizer.mask) {
        write_le<double>(out, static_cast<double>(m));
    }
    if (!out) {
        throw error("write failure on checkpoint: " + path.string());
    }
}

inline CheckpointInfo load_checkpoint(const std::filesystem::path& path, VadesModel& model) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw config_error("cannot open checkpoint: " + path.string());
    }
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
        throw config_error("not a VADES checkpoint: " + path.string());
    }
    if (read_le<std::uint32_t>(in) != kCheckpointVersion) {
        throw config_error("unsupported checkpoint version in " + path.string());
    }
    const auto meta_len = read_le<std::uint64_t>(in);
    std::string meta_str(meta_len, '\0');
    in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    if (!in) {
        throw config_error("truncated checkpoint: " + path.string());
    }
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_str);
    } catch (const nlohmann::json::exception& e) {
        throw config_error("corrupt checkpoint metadata: " + std::string(e.what()));
    }

    CheckpointInfo info;
    info.config = TrainConfig::from_json(meta.at("config"));
    info.epoch = meta.at("epoch").get<int>();
    info.rng_state = meta.at("rng_state").get<std::string>();

    FeatureInventory inv = inventory_from_json(meta.at("inventory"));
    EncoderConfig enc = EncoderConfig::from_json(meta.at("encoder"));
    auto authors = meta.at("author_ids").get<std::vector<std::string>>();
    const std::size_t r = inv.dim();

    Standardizer st;
    st.means.assign(r, 0.0);
    st.stds.assign(r, 1.0);
    st.mask.assign(r, 0);
    model.allocate(std::move(authors), std::move(inv), std::move(st), std::move(enc));

    read_f64s(in, model.author_mu.data(), model.author_mu.size());
    read_f64s(in, model.author_logvar.data(), model.author_logvar.size());
    detail::read_head_blobs(in, model.f);
    detail::read_head_blobs(in, model.g);
    read_f64s(in, model.cp.v.data(), 4);
    if (model.enc_cfg.kind == EncoderConfig::Kind::Builtin) {
        read_f64s(in, model.table.rows.data(), model.table.rows.size());
    }
    read_f64s(in, model.standardizer.means.data(), r);
    read_f64s(in, model.standardizer.stds.data(), r);
    for (std::size_t j = 0; j < r; ++j) {
        model.standardizer.mask[j] = read_le<double>(in) != 0.0 ? 1 : 0;
    }
    return info;
}

} // namespace vades
