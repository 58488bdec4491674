#include "netoas/user_store.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "netoas/errors.hpp"

namespace netoas {

bool UserStore::valid_id(const std::string& id) {
    if (id.empty() || id.size() > 64) return false;
    return std::all_of(id.begin(), id.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-' || c == '.';
    });
}

std::vector<UserRecord> UserStore::load() const {
    std::vector<UserRecord> users;
    std::ifstream in(path_);
    if (!in) return users;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path_.string() + ":" + std::to_string(n) + ": " + e.what());
        }
        const std::string op = j.value("op", "");
        const std::string id = j.value("id", "");
        if (op == "user") {
            users.push_back({id, j.value("name", id), {}});
        } else if (op == "synopsis") {
            auto it = std::find_if(users.begin(), users.end(), [&](const UserRecord& u) { return u.id == id; });
            if (it == users.end()) throw FormatError(path_.string() + ": synopsis for unknown user '" + id + "'");
            it->synopses.push_back(j.at("report"));
        } else {
            throw FormatError(path_.string() + ":" + std::to_string(n) + ": unknown record");
        }
    }
    return users;
}

void UserStore::append_line(const nlohmann::json& j) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error("cannot open user store " + path_.string());
    out << j.dump() << "\n";
    out.flush();
    if (!out) throw Error("write failed on user store " + path_.string());
}

void UserStore::create_user(const std::string& id, const std::string& display_name) {
    if (!valid_id(id)) throw ContractViolation("invalid user id '" + id + "'");
    std::lock_guard lk(m_);
    const auto users = load();
    if (std::any_of(users.begin(), users.end(), [&](const UserRecord& u) { return u.id == id; }))
        throw Conflict("user '" + id + "' already exists");
    append_line({{"op", "user"}, {"id", id}, {"name", display_name}});
}

bool UserStore::has_user(const std::string& id) const {
    std::lock_guard lk(m_);
    const auto users = load();
    return std::any_of(users.begin(), users.end(), [&](const UserRecord& u) { return u.id == id; });
}

std::vector<UserRecord> UserStore::list_users() const {
    std::lock_guard lk(m_);
    return load();
}

void UserStore::append_synopsis(const std::string& id, const nlohmann::json& synopsis) {
    if (!valid_id(id)) throw ContractViolation("invalid user id '" + id + "'");
    std::lock_guard lk(m_);
    const auto users = load();
    if (std::none_of(users.begin(), users.end(), [&](const UserRecord& u) { return u.id == id; }))
        throw ContractViolation("unknown user '" + id + "'");
    append_line({{"op", "synopsis"}, {"id", id}, {"report", synopsis}});
}

std::vector<nlohmann::json> UserStore::history(const std::string& id) const {
    std::lock_guard lk(m_);
    for (auto& u : load())
        if (u.id == id) return u.synopses;
    throw ContractViolation("unknown user '" + id + "'");
}

}  // namespace netoas
