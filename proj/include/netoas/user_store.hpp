#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

namespace netoas {

struct UserRecord {
    std::string id;
    std::string display_name;
    std::vector<nlohmann::json> synopses;  // oldest first
};

// Append-only JSON-lines store: one line per created user or appended synopsis.
class UserStore {
public:
    explicit UserStore(std::filesystem::path path) : path_(std::move(path)) {}

    void create_user(const std::string& id, const std::string& display_name);
    bool has_user(const std::string& id) const;
    std::vector<UserRecord> list_users() const;
    void append_synopsis(const std::string& id, const nlohmann::json& synopsis);
    std::vector<nlohmann::json> history(const std::string& id) const;

    static bool valid_id(const std::string& id);

private:
    std::vector<UserRecord> load() const;
    void append_line(const nlohmann::json& j);

    std::filesystem::path path_;
    mutable std::mutex m_;
};

}  // namespace netoas
