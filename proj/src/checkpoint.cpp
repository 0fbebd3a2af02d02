// Copyright 2026 The hintaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hintaug/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hintaug/error.hpp"

namespace hintaug {

namespace {

constexpr std::uint8_t magic[4] = {'H', 'A', 'C', '1'};

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value)
{
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    }
}

template <class T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset)
{
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<T>(bytes[offset + i]) << (8 * i);
    }
    return v;
}

} // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hash_to_hex(std::uint64_t hash)
{
    static const char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[hash & 0xf];
        hash >>= 4;
    }
    return s;
}

std::vector<std::uint8_t> encode_payload(const NamedTensors& tensors)
{
    std::vector<std::uint8_t> out;
    out.reserve(count_parameters(tensors) * 8);
    for (const auto& t : tensors) {
        for (double v : t.tensor.data()) {
            put_le(out, std::bit_cast<std::uint64_t>(v));
        }
    }
    return out;
}

std::vector<std::uint8_t> encode_hac1(const nlohmann::json& meta, const NamedTensors& tensors)
{
    nlohmann::json header = meta;
    nlohmann::json dir = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& t : tensors) {
        dir.push_back({{"name", t.name}, {"shape", t.tensor.shape()}, {"offset", offset}, {"count", t.tensor.numel()}});
        offset += t.tensor.numel() * 8;
    }
    header["tensors"] = dir;
    header["payload_bytes"] = offset;
    const std::string text = header.dump();
    const std::vector<std::uint8_t> payload = encode_payload(tensors);

    std::vector<std::uint8_t> out(std::begin(magic), std::end(magic));
    put_le<std::uint32_t>(out, hac1_version);
    put_le<std::uint64_t>(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    out.insert(out.end(), payload.begin(), payload.end());
    put_le<std::uint64_t>(out, fnv1a64(payload));
    return out;
}

Hac1Contents decode_hac1(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 16 || !std::equal(std::begin(magic), std::end(magic), bytes.begin())) {
        throw ParseError("not a HAC1 file (bad magic)");
    }
    Hac1Contents c;
    c.version = get_le<std::uint32_t>(bytes, 4);
    if (c.version != hac1_version) {
        throw ParseError("unsupported HAC1 version " + std::to_string(c.version));
    }
    const std::uint64_t header_len = get_le<std::uint64_t>(bytes, 8);
    if (header_len > bytes.size() - 16) {
        throw ParseError("HAC1 header length exceeds file size");
    }
    const char* header_begin = reinterpret_cast<const char*>(bytes.data() + 16);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_begin, header_begin + header_len);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("HAC1 header is not valid JSON: ") + e.what());
    }
    const std::size_t payload_start = 16 + header_len;
    std::size_t payload_bytes = 0;
    try {
        payload_bytes = header.at("payload_bytes").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("HAC1 header: ") + e.what());
    }
    if (payload_start + payload_bytes + 8 != bytes.size()) {
        throw ParseError("HAC1 size mismatch: header declares " + std::to_string(payload_bytes)
                         + " payload bytes, file has " + std::to_string(bytes.size()));
    }
    const auto payload = bytes.subspan(payload_start, payload_bytes);
    c.payload_hash = get_le<std::uint64_t>(bytes, payload_start + payload_bytes);
    if (fnv1a64(payload) != c.payload_hash) {
        throw ParseError("HAC1 payload hash mismatch");
    }
    try {
        for (const auto& entry : header.at("tensors")) {
            Shape shape = entry.at("shape").get<Shape>();
            const std::size_t offset = entry.at("offset").get<std::size_t>();
            const std::size_t count = entry.at("count").get<std::size_t>();
            if (shape_numel(shape) != count || offset + count * 8 > payload.size() || offset % 8 != 0) {
                throw ParseError("HAC1 tensor '" + entry.at("name").get<std::string>() + "' has an invalid extent");
            }
            std::vector<double> values(count);
            for (std::size_t i = 0; i < count; ++i) {
                values[i] = std::bit_cast<double>(get_le<std::uint64_t>(payload, offset + i * 8));
            }
            c.tensors.push_back({entry.at("name").get<std::string>(), Tensor(std::move(shape), std::move(values))});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("HAC1 tensor directory: ") + e.what());
    } catch (const DimensionError& e) {
        throw ParseError(std::string("HAC1 tensor directory: ") + e.what());
    }
    header.erase("tensors");
    header.erase("payload_bytes");
    c.meta = std::move(header);
    return c;
}

nlohmann::json to_json(const ViTConfig& c)
{
    return {{"image_size", c.image_size}, {"patch_size", c.patch_size}, {"channels", c.channels},
            {"embed_dim", c.embed_dim},   {"num_layers", c.num_layers}, {"num_heads", c.num_heads},
            {"mlp_ratio", c.mlp_ratio},   {"num_classes", c.num_classes}, {"aod_layer", c.aod_layer},
            {"query_patch", c.query_patch}};
}

ViTConfig vit_config_from_json(const nlohmann::json& j)
{
    ViTConfig c;
    try {
        c.image_size = j.at("image_size").get<std::size_t>();
        c.patch_size = j.at("patch_size").get<std::size_t>();
        c.channels = j.at("channels").get<std::size_t>();
        c.embed_dim = j.at("embed_dim").get<std::size_t>();
        c.num_layers = j.at("num_layers").get<std::size_t>();
        c.num_heads = j.at("num_heads").get<std::size_t>();
        c.mlp_ratio = j.at("mlp_ratio").get<double>();
        c.num_classes = j.at("num_classes").get<std::size_t>();
        c.aod_layer = j.at("aod_layer").get<std::size_t>();
        c.query_patch = j.at("query_patch").get<long>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model config: ") + e.what());
    }
    c.validate();
    return c;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint)
{
    nlohmann::json meta = {{"kind", "backbone"},
                           {"config", to_json(checkpoint.model.config)},
                           {"training_curve", {{"loss", checkpoint.epoch_loss}, {"accuracy", checkpoint.epoch_accuracy}}}};
    return encode_hac1(meta, checkpoint.model.named_weights());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes)
{
    Hac1Contents c = decode_hac1(bytes);
    if (c.meta.value("kind", "") != "backbone") {
        throw ParseError("HAC1 file is not a backbone checkpoint");
    }
    Checkpoint ck{ViT::from_named(vit_config_from_json(c.meta.at("config")), c.tensors), {}, {}};
    if (c.meta.contains("training_curve")) {
        ck.epoch_loss = c.meta["training_curve"].value("loss", std::vector<double>{});
        ck.epoch_accuracy = c.meta["training_curve"].value("accuracy", std::vector<double>{});
    }
    return ck;
}

std::vector<std::uint8_t> encode_pet(const PetModule& pet, const ViT& backbone)
{
    const PetHyper& h = pet.hyper();
    nlohmann::json meta = {{"kind", "pet"},
                           {"config", to_json(backbone.config)},
                           {"backbone_hash", hash_to_hex(backbone.content_hash())},
                           {"pet",
                            {{"kind", to_string(pet.kind())},
                             {"bottleneck", h.bottleneck},
                             {"rank", h.rank},
                             {"alpha", h.alpha},
                             {"prompts", h.prompts}}}};
    return encode_hac1(meta, pet.parameters());
}

PetArtifact decode_pet(std::span<const std::uint8_t> bytes)
{
    Hac1Contents c = decode_hac1(bytes);
    if (c.meta.value("kind", "") != "pet") {
        throw ParseError("HAC1 file is not a PET artifact");
    }
    try {
        const auto& p = c.meta.at("pet");
        PetHyper h;
        h.bottleneck = p.at("bottleneck").get<std::size_t>();
        h.rank = p.at("rank").get<std::size_t>();
        h.alpha = p.at("alpha").get<double>();
        h.prompts = p.at("prompts").get<std::size_t>();
        const ViTConfig config = vit_config_from_json(c.meta.at("config"));
        const std::string hex = c.meta.at("backbone_hash").get<std::string>();
        return PetArtifact{PetModule::from_named(config, parse_pet_kind(p.at("kind").get<std::string>()), h,
                                                 std::move(c.tensors)),
                           config, std::stoull(hex, nullptr, 16)};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("PET header: ") + e.what());
    }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint)
{
    write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

void save_pet(const std::filesystem::path& path, const PetModule& pet, const ViT& backbone)
{
    write_file(path, encode_pet(pet, backbone));
}

PetArtifact load_pet(const std::filesystem::path& path) { return decode_pet(read_file(path)); }

} // namespace hintaug
