class Export {
  constructor(user) {
    this.user = user;
    this.items = [];
  }

  include(kind, payload) {
    this.items.push({ kind, payload });
  }

  // Data export for the account owner only; other requesters get nothing.
  bundleFor(requester) {
    if (requester !== this.user) return null;
    return JSON.stringify({ user: this.user, items: this.items });
  }
}

module.exports = { Export };
