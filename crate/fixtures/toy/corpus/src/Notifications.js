class Notifications {
  constructor() {
    this.unread = new Map();
  }

  push(user, text) {
    const list = this.unread.get(user) || [];
    list.push(text);
    this.unread.set(user, list);
  }

  // Lock-screen banner: never includes message text.
  banner(user) {
    const count = (this.unread.get(user) || []).length;
    if (count > 0) {
      return `${count} new message${count === 1 ? '' : 's'}`;
    }
    return '';
  }
}

module.exports = { Notifications };
