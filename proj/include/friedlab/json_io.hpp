#pragma once

// Deterministic JSON emission: fixed key order (insertion order of the
// caller) and fixed numeric formatting (17 significant digits), so that
// identical inputs produce byte-identical files.

#include <string>
#include <vector>

namespace friedlab::io {

std::string format_double(double x);  // %.17g, locale-independent

class JsonWriter {
 public:
  explicit JsonWriter(int indent = 2) : indent_(indent) {}

  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& name);

  JsonWriter& value(double v);
  JsonWriter& value(int v);
  JsonWriter& value(long v);
  JsonWriter& value(bool v);
  JsonWriter& value(const char* v);
  JsonWriter& value(const std::string& v);
  JsonWriter& value(const std::vector<double>& v);
  JsonWriter& value(const std::vector<int>& v);
  JsonWriter& value(const std::vector<bool>& v);

  // shorthand for key(...).value(...)
  template <typename T>
  JsonWriter& field(const std::string& name, const T& v) {
    key(name);
    return value(v);
  }

  std::string str() const { return out_; }

 private:
  void prepare_slot();  // comma/newline/indent bookkeeping before a value
  void newline();
  static std::string escape(const std::string& s);

  std::string out_;
  int indent_ = 2;
  int depth_ = 0;
  std::vector<bool> first_in_scope_;
  bool pending_key_ = false;
};

// 64-bit FNV-1a over a byte string, as a 16-digit hex literal. Used to
// stamp outputs with a content hash of the mesh they were computed on.
std::string fnv1a_hex(const std::string& bytes);

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace friedlab::io
