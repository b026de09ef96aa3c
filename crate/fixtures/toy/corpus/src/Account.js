class Account {
  constructor(owner, { isPrivate = false, friends = [] } = {}) {
    this.owner = owner;
    this.isPrivate = isPrivate;
    this.friends = new Set(friends);
    this.posts = [];
  }

  addPost(text) {
    this.posts.push({ text, at: this.posts.length });
    return this.posts.length;
  }

  canView(viewer) {
    if (viewer === this.owner) return true;
    if (this.isPrivate && !this.friends.has(viewer)) return false;
    return true;
  }

  visiblePosts(viewer) {
    if (!this.canView(viewer)) {
      return [];
    }
    return this.posts.map((p) => p.text);
  }
}

module.exports = { Account };
