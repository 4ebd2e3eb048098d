#include "hyperfusion/serialize.hpp"

#include <fstream>
#include <system_error>

#include "hyperfusion/errors.hpp"

namespace hyperfusion::io {

const char* Reader::take(std::size_t n) {
  if (pos_ + n > data_.size())
    throw DataError("format error at byte offset " + std::to_string(pos_) +
                    ": truncated payload (need " + std::to_string(n) +
                    " bytes, have " + std::to_string(data_.size() - pos_) + ")");
  const char* p = data_.data() + pos_;
  pos_ += n;
  return p;
}

void write_sections_file(const std::filesystem::path& path,
                         const std::string& magic, std::uint32_t version,
                         const std::vector<Section>& sections) {
  Writer w;
  w.bytes(magic.data(), magic.size());
  w.u32(version);
  w.u32(static_cast<std::uint32_t>(sections.size()));
  for (const auto& s : sections) {
    w.str(s.name);
    w.u64(s.payload.size());
    w.bytes(s.payload.data(), s.payload.size());
  }
  atomic_write_file(path, w.buffer());
}

std::vector<Section> read_sections_file(const std::filesystem::path& path,
                                        const std::string& magic,
                                        std::uint32_t expected_version) {
  Reader r(read_file_bytes(path));
  const char* m = r.take(magic.size());
  if (std::string(m, magic.size()) != magic)
    throw DataError("format error: bad magic in " + path.string() +
                    " (expected '" + magic + "')");
  const std::uint32_t version = r.u32();
  if (expected_version != 0 && version != expected_version)
    throw DataError("version mismatch in " + path.string() + ": file has v" +
                    std::to_string(version) + ", tool expects v" +
                    std::to_string(expected_version));
  const std::uint32_t count = r.u32();
  std::vector<Section> sections;
  sections.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Section s;
    s.name = r.str();
    const std::uint64_t len = r.u64();
    const char* p = r.take(len);
    s.payload.assign(p, len);
    sections.push_back(std::move(s));
  }
  return sections;
}

const Section* find_section(const std::vector<Section>& sections,
                            const std::string& name) {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

void atomic_write_file(const std::filesystem::path& path,
                       const std::string& contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

}  // namespace hyperfusion::io
