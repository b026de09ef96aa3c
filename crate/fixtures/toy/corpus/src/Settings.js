const DEFAULTS = Object.freeze({ shareLocation: false, readReceipts: true, lastSeen: 'contacts' });

class Settings {
  constructor(overrides = {}) {
    this.values = { ...DEFAULTS, ...overrides };
  }

  get(key) {
    if (!(key in DEFAULTS)) throw new Error(`unknown setting ${key}`);
    return this.values[key];
  }

  lastSeenVisibleTo(isContact) {
    const mode = this.values.lastSeen;
    return mode === 'everyone' || (mode === 'contacts' && isContact);
  }
}

module.exports = { Settings, DEFAULTS };
