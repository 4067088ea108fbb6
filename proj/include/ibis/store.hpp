#pragma once

#include <filesystem>
#include <string>

#include "ibis/codec.hpp"

namespace ibis {

// Content-addressed blob directory: <root>/<aa>/<digest>.png, key = sha256 of the bytes.
// Writes go to a unique temporary file and are renamed into place, so concurrent
// writers of the same blob are idempotent and readers never see partial files.
class ArtifactStore {
public:
    explicit ArtifactStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    std::string put(std::span<const std::uint8_t> bytes) const;
    Bytes get(const std::string& digest) const;
    bool contains(const std::string& digest) const;
    std::filesystem::path path_of(const std::string& digest) const;

    std::string put_mask(const Mask& m) const { return put(encode_mask_png(m)); }
    Mask get_mask(const std::string& digest) const { return decode_mask_png(get(digest)); }
    std::string put_image(const Image& img) const { return put(encode_image_png(img)); }
    Image get_image(const std::string& digest) const { return decode_image_png(get(digest)); }

private:
    std::filesystem::path root_;
};

}  // namespace ibis
