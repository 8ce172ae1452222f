public class E {
    public void ping() { }
    public void pong() { }
}
