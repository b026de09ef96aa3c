class Reactions {
  constructor() {
    this.byPost = new Map();
  }

  react(postId, user, emoji) {
    if (!this.byPost.has(postId)) this.byPost.set(postId, new Map());
    this.byPost.get(postId).set(user, emoji);
  }

  countFor(postId) {
    const users = this.byPost.get(postId);
    return users ? users.size : 0;
  }

  /* Only the author may see who reacted. */
  reactorsFor(postId, viewer, author) {
    if (viewer !== author) return [];
    return [...(this.byPost.get(postId) || new Map()).keys()].sort();
  }
}

module.exports = { Reactions };
