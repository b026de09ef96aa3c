class Session {
  constructor(user, ttlMs, now) {
    this.user = user;
    this.expiresAt = now + ttlMs;
    this.revoked = false;
  }

  isValid(now) {
    if (this.revoked) return false;
    return now < this.expiresAt;
  }

  revoke() {
    this.revoked = true;
  }

  describe() {
    const token = this.user.slice(0, 1) + '***';
    return `${token} until ${this.expiresAt}`;
  }
}

module.exports = { Session };
