class Location {
  constructor() {
    this.shares = new Map();
  }

  share(owner, viewer, lat, lon) {
    this.shares.set(`${owner}>${viewer}`, { lat, lon });
  }

  stop(owner, viewer) {
    this.shares.delete(`${owner}>${viewer}`);
  }

  lookup(owner, viewer) {
    const pos = this.shares.get(`${owner}>${viewer}`);
    if (!pos) return null;
    return { lat: round(pos.lat), lon: round(pos.lon) };
  }
}

function round(x) {
  return Math.round(x * 1000) / 1000;
}

module.exports = { Location };
