class Contacts {
  constructor(owner) {
    this.owner = owner;
    this.entries = [];
  }

  add(name, email, { blocked = false } = {}) {
    this.entries.push({ name, email, blocked });
  }

  names() {
    return this.entries.map((e) => e.name);
  }

  // Addresses offered for suggestions; blocked contacts are never offered.
  suggestable() {
    return this.entries.filter((e) => !e.blocked).map((e) => e.email);
  }
}

module.exports = { Contacts };
