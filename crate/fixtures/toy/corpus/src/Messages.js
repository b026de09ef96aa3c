class Messages {
  constructor() {
    this.threads = new Map();
  }

  send(from, to, body) {
    const key = [from, to].sort().join('|');
    if (!this.threads.has(key)) this.threads.set(key, []);
    this.threads.get(key).push({ from, to, body });
  }

  thread(a, b) {
    return this.threads.get([a, b].sort().join('|')) || [];
  }

  preview(message, viewer) {
    if (viewer !== message.from && viewer !== message.to) {
      return '(hidden)';
    }
    return message.body.slice(0, 20);
  }
}

module.exports = { Messages };
