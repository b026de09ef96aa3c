class Profile {
  constructor(name, phone, { hidePhone = true } = {}) {
    this.name = name;
    this.phone = phone;
    this.hidePhone = hidePhone;
  }

  // Contact card shown to other users.
  card() {
    const lines = [this.name];
    if (!this.hidePhone) lines.push(this.phone);
    return lines.join('\n');
  }

  initials() {
    return this.name
      .split(/\s+/)
      .map((part) => part[0].toUpperCase())
      .join('');
  }
}

module.exports = { Profile };
