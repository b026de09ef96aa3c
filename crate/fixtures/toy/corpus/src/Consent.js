class Consent {
  constructor() {
    this.granted = new Set();
  }

  grant(purpose) {
    this.granted.add(purpose);
  }

  withdraw(purpose) {
    this.granted.delete(purpose);
  }

  allows(purpose) {
    return this.granted.has(purpose);
  }
}

module.exports = { Consent };
